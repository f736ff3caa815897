package com.example.app03;

public class MainActivity {
    private String name = "item 3";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 3);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
