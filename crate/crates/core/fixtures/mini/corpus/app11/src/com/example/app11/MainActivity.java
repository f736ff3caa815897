package com.example.app11;

public class MainActivity {
    private String name = "item 11";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 11);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
