package com.example.app01;

public class MainActivity {
    private String name = "item 1";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 1);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
