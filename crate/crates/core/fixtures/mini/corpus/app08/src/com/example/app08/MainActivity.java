package com.example.app08;

public class MainActivity {
    private String name = "item 8";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 8);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
